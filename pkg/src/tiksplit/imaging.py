"""Imaging toolkit: Gaussian blur, Haar wavelets, PSNR, PGM files.

Images are 2-D float64 arrays with intensities on the [0, 1] scale.
Processing is sequential and deterministic; the same inputs always produce
bit-identical outputs.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .operators import LinearOperator, compose


@dataclass(frozen=True)
class GaussianPsf:
    """Normalized, centered Gaussian point-spread function.

    weights is the size x size kernel; it sums to 1 and is symmetric under
    flips and 90-degree rotation by construction.
    """

    size: int
    sigma: float
    weights: object


def gaussian_psf(size, sigma):
    """Sampled Gaussian kernel exp(-(i^2+j^2)/(2 sigma^2)) on a centered
    odd-size grid, normalized to unit sum."""
    if size < 1 or size % 2 == 0:
        raise ValueError("kernel size must be odd and >= 1, got %d" % size)
    if not sigma > 0:
        raise ValueError("sigma must be > 0, got %g" % sigma)
    half = size // 2
    idx = np.arange(-half, half + 1, dtype=float)
    g = np.exp(-(idx[:, None] ** 2 + idx[None, :] ** 2) / (2.0 * sigma * sigma))
    return GaussianPsf(size=size, sigma=float(sigma), weights=g / g.sum())


def as_image(arr):
    a = np.asarray(arr, dtype=float)
    if a.ndim != 2:
        raise ValueError("expected a 2-D image, got shape %s" % (a.shape,))
    if not np.all(np.isfinite(a)):
        raise ValueError("image pixels must be finite")
    return a


def convolve_neumann(psf, image):
    """Blur with half-sample symmetric (reflected) boundary handling.

    The edge rows/columns are mirrored without repeating the boundary
    sample's neighbor (pattern d c b a | a b c d), which together with the
    kernel's symmetry makes the blur operator self-adjoint.
    """
    img = as_image(image)
    if psf.size > min(img.shape):
        raise ValueError(
            "kernel %dx%d exceeds image %dx%d"
            % (psf.size, psf.size, img.shape[0], img.shape[1])
        )
    return ndimage.correlate(img, psf.weights, mode="reflect")


def blur_operator(psf, shape):
    """The blur as a LinearOperator on flattened pixels.

    Self-adjoint (symmetric kernel, reflected boundary) with operator norm
    exactly 1: the kernel is nonnegative with unit sum and the boundary
    handling preserves constants.
    """
    h, w = shape

    def apply(x):
        return convolve_neumann(psf, np.asarray(x, dtype=float).reshape(h, w)).ravel()

    return LinearOperator(apply=apply, adjoint=apply,
                          in_dim=h * w, out_dim=h * w, norm_bound=1.0)


# ---------------------------------------------------------------------------
# orthonormal Haar transform

_SQRT2 = math.sqrt(2.0)


def _dwt2_once(a):
    rl = (a[:, 0::2] + a[:, 1::2]) / _SQRT2
    rh = (a[:, 0::2] - a[:, 1::2]) / _SQRT2
    out = np.empty_like(a)
    h2, w2 = a.shape[0] // 2, a.shape[1] // 2
    out[:h2, :w2] = (rl[0::2, :] + rl[1::2, :]) / _SQRT2
    out[:h2, w2:] = (rh[0::2, :] + rh[1::2, :]) / _SQRT2
    out[h2:, :w2] = (rl[0::2, :] - rl[1::2, :]) / _SQRT2
    out[h2:, w2:] = (rh[0::2, :] - rh[1::2, :]) / _SQRT2
    return out


def _idwt2_once(c):
    h2, w2 = c.shape[0] // 2, c.shape[1] // 2
    rl = np.empty((c.shape[0], w2))
    rh = np.empty((c.shape[0], w2))
    rl[0::2, :] = (c[:h2, :w2] + c[h2:, :w2]) / _SQRT2
    rl[1::2, :] = (c[:h2, :w2] - c[h2:, :w2]) / _SQRT2
    rh[0::2, :] = (c[:h2, w2:] + c[h2:, w2:]) / _SQRT2
    rh[1::2, :] = (c[:h2, w2:] - c[h2:, w2:]) / _SQRT2
    a = np.empty_like(c)
    a[:, 0::2] = (rl + rh) / _SQRT2
    a[:, 1::2] = (rl - rh) / _SQRT2
    return a


def _check_wavelet_shape(shape, levels):
    # levels = 0 is the identity transform
    if levels < 0:
        raise ValueError("levels must be >= 0, got %d" % levels)
    h, w = shape
    d = 2 ** levels
    if h % d or w % d:
        raise ValueError(
            "image shape %dx%d not divisible by 2^levels = %d" % (h, w, d)
        )


def haar_dwt(image, levels):
    """Multi-level orthonormal 2-D Haar analysis, flattened to a vector.

    Each level splits the running approximation into the standard four
    quadrants (approximation top-left, detail bands elsewhere) and recurses
    on the approximation.  Energy is preserved exactly up to rounding.
    """
    img = as_image(image)
    _check_wavelet_shape(img.shape, levels)
    out = img.copy()
    h, w = img.shape
    for lev in range(levels):
        hh, ww = h >> lev, w >> lev
        out[:hh, :ww] = _dwt2_once(out[:hh, :ww])
    return out.ravel()


def haar_idwt(coeffs, shape, levels):
    """Inverse of haar_dwt; returns the 2-D image."""
    _check_wavelet_shape(shape, levels)
    h, w = shape
    c = np.asarray(coeffs, dtype=float).reshape(h, w).copy()
    for lev in reversed(range(levels)):
        hh, ww = h >> lev, w >> lev
        c[:hh, :ww] = _idwt2_once(c[:hh, :ww])
    return c


def wavelet_synthesis_operator(shape, levels):
    """Coefficients -> pixels as a LinearOperator; the adjoint is the
    analysis transform (the transform is orthonormal)."""
    _check_wavelet_shape(shape, levels)
    h, w = shape

    def apply(coeffs):
        return haar_idwt(coeffs, (h, w), levels).ravel()

    def adjoint(pixels):
        return haar_dwt(np.asarray(pixels, dtype=float).reshape(h, w), levels)

    return LinearOperator(apply=apply, adjoint=adjoint,
                          in_dim=h * w, out_dim=h * w, norm_bound=1.0)


def compose_deblur_operator(psf, shape, levels):
    """Observation operator of the deblurring model: blur after synthesis.

    Maps wavelet coefficients to blurred pixels; the adjoint runs the blur
    (self-adjoint) followed by analysis.  Norm bound 1 (product of unit
    bounds).
    """
    return compose(blur_operator(psf, shape), wavelet_synthesis_operator(shape, levels))


# ---------------------------------------------------------------------------
# quality metric

def psnr(reference, test):
    """Peak signal-to-noise ratio in dB on the [0, 1] intensity scale.

    Returns +inf when the images agree exactly.
    """
    ref = as_image(reference)
    tst = as_image(test)
    if ref.shape != tst.shape:
        raise ValueError("shape mismatch: %s vs %s" % (ref.shape, tst.shape))
    mse = float(np.mean((ref - tst) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


# ---------------------------------------------------------------------------
# PGM input/output

def _tokenize_pnm_header(data, count):
    tokens = []
    pos = 0
    while len(tokens) < count:
        if pos >= len(data):
            raise ValueError("truncated PNM header")
        c = data[pos:pos + 1]
        if c == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            start = pos
            while pos < len(data) and not data[pos:pos + 1].isspace():
                pos += 1
            tokens.append(data[start:pos])
    return tokens, pos + 1  # raster starts after a single whitespace byte


def read_pgm(path):
    """Read an 8-bit binary PGM (P5) as a [0, 1] image.

    Binary PPM (P6) color input is accepted and reduced to luminance with
    weights 0.299, 0.587, 0.114.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    tokens, start = _tokenize_pnm_header(data, 4)
    magic = tokens[0]
    if magic not in (b"P5", b"P6"):
        raise ValueError("unsupported PNM magic %r (need binary P5 or P6)" % magic)
    width, height, maxval = (int(t) for t in tokens[1:4])
    if not (width >= 1 and height >= 1):
        raise ValueError("invalid PNM dimensions %dx%d" % (width, height))
    if not 1 <= maxval <= 255:
        raise ValueError("only 8-bit PNM supported, maxval=%d" % maxval)
    channels = 3 if magic == b"P6" else 1
    need = width * height * channels
    raster = data[start:start + need]
    if len(raster) != need:
        raise ValueError("PNM raster truncated: need %d bytes, have %d"
                         % (need, len(raster)))
    arr = np.frombuffer(raster, dtype=np.uint8).astype(float) / maxval
    if channels == 3:
        rgb = arr.reshape(height, width, 3)
        return 0.299 * rgb[:, :, 0] + 0.587 * rgb[:, :, 1] + 0.114 * rgb[:, :, 2]
    return arr.reshape(height, width)


def write_pgm(path, image):
    """Write a [0, 1] image as 8-bit binary PGM.

    Intensities are clipped to [0, 1] and quantized round-half-up.
    """
    img = np.clip(as_image(image), 0.0, 1.0)
    q = np.floor(img * 255.0 + 0.5).astype(np.uint8)
    h, w = q.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (w, h))
        fh.write(q.tobytes())


def write_psf(path, psf):
    """Export a PSF as text: 'size sigma' header, then row-major weights."""
    with open(path, "w") as fh:
        fh.write("%d %s\n" % (psf.size, repr(float(psf.sigma))))
        for row in np.asarray(psf.weights):
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")
