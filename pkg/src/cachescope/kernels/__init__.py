"""Hot-kernel backend selection.

The LSTM layer passes and the periodogram DFT run either as numba JIT
kernels or as pure numpy. CACHESCOPE_BACKEND=numpy forces the fallback;
CACHESCOPE_BACKEND=numba demands the JIT (raising if unavailable);
unset, numba is used when it imports and compiles, numpy otherwise.
"""

import os

from . import numpy_backend

ACT_TANH = numpy_backend.ACT_TANH
ACT_RELU = numpy_backend.ACT_RELU

_requested = os.environ.get("CACHESCOPE_BACKEND", "").strip().lower()
if _requested not in ("", "numba", "numpy"):
    raise ValueError(
        f"CACHESCOPE_BACKEND must be 'numba' or 'numpy', got {_requested!r}"
    )


def _load_numba():
    import numpy as np

    from . import numba_backend

    # compile the kernels on a tiny case so a broken toolchain fails here
    x = np.zeros((1, 1, 2))
    w = np.zeros((2, 4))
    wh = np.zeros((1, 4))
    b = np.zeros(4)
    out = numba_backend.lstm_forward(x, w, wh, b, ACT_TANH)
    numba_backend.lstm_backward(x, w, wh, *out[1:], out[0], out[0], ACT_TANH)
    numba_backend.dft_power(np.zeros(8))
    return numba_backend


if _requested == "numpy":
    _impl = numpy_backend
elif _requested == "numba":
    _impl = _load_numba()
else:
    try:
        _impl = _load_numba()
    except Exception:
        _impl = numpy_backend

BACKEND = "numba" if _impl is not numpy_backend else "numpy"

lstm_forward = _impl.lstm_forward
lstm_backward = _impl.lstm_backward
dft_power = _impl.dft_power


def backend_name() -> str:
    """The active kernel backend: "numba" or "numpy"."""
    return BACKEND
