"""Layout-independent complex products.

numpy's complex multiply takes different inner loops for contiguous and
strided operands, and the loops do not round identically.  Outputs must be
bit-identical however blocks and time samples are chunked, so hot-path
products are spelled out in real arithmetic here.
"""

import numpy as np


def cmul(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    ar, ai = a.real, a.imag
    br, bi = b.real, b.imag
    re = ar * br - ai * bi
    im = ar * bi + ai * br
    return re + 1j * im if np.ndim(re) == 0 else _pack(re, im)


def cmulc(a, b):
    """``a * conj(b)``."""
    a = np.asarray(a)
    b = np.asarray(b)
    ar, ai = a.real, a.imag
    br, bi = b.real, b.imag
    re = ar * br + ai * bi
    im = ai * br - ar * bi
    return re + 1j * im if np.ndim(re) == 0 else _pack(re, im)


def abs2(a):
    a = np.asarray(a)
    return a.real * a.real + a.imag * a.imag


def _pack(re, im):
    out = np.empty(re.shape, dtype=complex)
    out.real = re
    out.imag = im
    return out
