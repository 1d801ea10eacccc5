"""
Compressing text with mixed context models
==========================================

Order-0, order-1 and order-2 byte models are mixed geometrically with the
horizon-aware step size. We compare the mixture with each model on its own
and check that decompression restores the input.
"""

import sys
from pathlib import Path

import numpy as np

from mixcomp import CompressConfig, ModelConfig, compress, decompress
from mixcomp.container import run_codec

path = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parents[1] / "README.md"
data = path.read_bytes()
print(f"{path.name}: {len(data)} bytes")

blob, stats = compress(data)
assert decompress(blob) == data
print(f"geo mix of orders 0,1,2: {stats.bits_per_symbol:.3f} bits/byte, container {len(blob)} bytes")
print("final weights:", np.round(stats.final_weights, 3))

xs = np.frombuffer(data, dtype=np.uint8).astype(np.int64)
for k in (0, 1, 2):
    nbits = run_codec(xs, CompressConfig(model=ModelConfig(orders=(k,))))[1]
    print(f"order {k} alone:           {nbits / len(data):.3f} bits/byte")
