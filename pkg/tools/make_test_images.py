"""Generate the bundled synthetic test images (deterministic, no RNG).

A cartoon-style pattern: smooth background gradient, solid rectangles, a
disk and thin lines.  Sharp edges suffer visibly under heavy blur, which
is what the deblurring examples need.
"""

import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from tiksplit.imaging import write_pgm


def pattern(size):
    y, x = np.mgrid[0:size, 0:size].astype(float) / (size - 1)
    img = 0.25 + 0.35 * x  # background ramp
    # solid rectangle, upper left
    img[int(0.12 * size):int(0.42 * size), int(0.10 * size):int(0.38 * size)] = 0.95
    # dark rectangle, lower right
    img[int(0.58 * size):int(0.88 * size), int(0.55 * size):int(0.92 * size)] = 0.05
    # disk, upper right
    cy, cx, r = 0.28, 0.72, 0.16
    img[(y - cy) ** 2 + (x - cx) ** 2 <= r * r] = 0.75
    # thin bright bars, lower left
    for k in range(3):
        r0 = int((0.60 + 0.10 * k) * size)
        img[r0:r0 + max(1, size // 32), int(0.08 * size):int(0.40 * size)] = 1.0
    return np.clip(img, 0.0, 1.0)


def main():
    out_dir = os.path.join(os.path.dirname(__file__), "..", "src", "tiksplit", "data")
    os.makedirs(out_dir, exist_ok=True)
    for size in (32, 64):
        write_pgm(os.path.join(out_dir, "pattern%d.pgm" % size), pattern(size))
        print("wrote pattern%d.pgm" % size)


if __name__ == "__main__":
    main()
