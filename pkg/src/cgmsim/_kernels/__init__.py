"""Hot-loop executors: a compiled Cython core with a pure-Python twin.

Both backends implement the same draw contract, consuming one uniform from
the caller's PCG64 stream per stochastic decision in a fixed order:

* game round: phase 1 walks agents in ascending id, one draw per posting
  trial; phase 2 walks readers in ascending id and, per reader, its posted
  neighbours in ascending id — one draw per read trial, then one per comment
  trial on a read, then one per meta-comment trial on a comment;
* evolution step: children are produced in (world, agent) order with two
  roulette draws for the parents, the crossover draws (one per bit for
  uniform, one for the cut under one-point), then nine mutation draws.

Because the arithmetic on both sides is plain IEEE double precision in the
same order, a simulation gives bit-identical results whichever backend runs
it.  The compiled core is used when importable; set ``CGMSIM_KERNELS=python``
to force the fallback (or ``cython`` to insist on the core).
"""

import os

from . import _purepy

purepy = _purepy

try:
    from . import _core
except ImportError:
    _core = None

_BACKENDS = {"python": _purepy}
if _core is not None:
    _BACKENDS["cython"] = _core


def _default():
    forced = os.environ.get("CGMSIM_KERNELS", "").strip().lower()
    if forced in ("python", "pure", "purepy"):
        return _purepy
    if forced in ("cython", "c", "compiled"):
        if _core is None:
            raise ImportError("CGMSIM_KERNELS requests the compiled core, "
                              "but cgmsim._kernels._core is not built")
        return _core
    return _core if _core is not None else _purepy


_active = _default()


def active():
    """The backend module currently executing hot loops."""
    return _active


def backend_name() -> str:
    return "cython" if _active is _core else "python"


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def set_backend(name: str):
    """Switch backends (tests and benchmarks); returns the chosen module."""
    global _active
    try:
        _active = _BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown backend {name!r}; available: {available_backends()}")
    return _active
