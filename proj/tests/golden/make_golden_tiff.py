# Copyright (c) 2026 The noisecal Authors
# SPDX-License-Identifier: Apache-2.0
"""Regenerates rgb2x2.tiff: the bilinear render of the 2x2 RGGB mosaic
R=0.25, G1=0.5, G2=0.75, B=1.0, written as baseline 16-bit RGB TIFF."""

import struct
from pathlib import Path

# (tag, type, count, value); SHORT=3, LONG=4, RATIONAL=5
ENTRIES = [
    (256, 4, 1, 2), (257, 4, 1, 2), (258, 3, 3, 170), (259, 3, 1, 1), (262, 3, 1, 2),
    (273, 4, 1, 192), (277, 3, 1, 3), (278, 4, 1, 2), (279, 4, 1, 24),
    (282, 5, 1, 176), (283, 5, 1, 184), (284, 3, 1, 1), (296, 3, 1, 1),
]


def u16(v: float) -> int:
    return round(v * 65535)  # Python rounds half to even


PIXELS = [(0.25, 0.625, 1.0), (0.25, 0.5, 1.0), (0.25, 0.75, 1.0), (0.25, 0.625, 1.0)]

out = bytearray(b"II") + struct.pack("<HI", 42, 8) + struct.pack("<H", len(ENTRIES))
for tag, typ, count, value in ENTRIES:
    out += struct.pack("<HHI", tag, typ, count)
    out += struct.pack("<HH", value, 0) if typ == 3 and count == 1 else struct.pack("<I", value)
out += struct.pack("<I", 0)
out += struct.pack("<3H", 16, 16, 16) + struct.pack("<4I", 72, 1, 72, 1)
assert len(out) == 192
for px in PIXELS:
    out += struct.pack("<3H", *(u16(c) for c in px))
Path(__file__).with_name("rgb2x2.tiff").write_bytes(bytes(out))
