"""Kernel backend selection: compiled extension if available, else pure Python."""
try:
    from . import _sweep as _impl
except ImportError:  # pragma: no cover - depends on build environment
    from . import _sweep_py as _impl

BACKEND = _impl.BACKEND
sweep_aligned = _impl.sweep_aligned


def get_backend(name=None):
    """Return (backend_name, sweep_aligned) for ``name`` in {None, "compiled", "python"}.

    ``None`` selects the import-time default.
    """
    if name is None:
        return BACKEND, sweep_aligned
    if name == "python":
        from . import _sweep_py
        return _sweep_py.BACKEND, _sweep_py.sweep_aligned
    if name == "compiled":
        from . import _sweep
        return _sweep.BACKEND, _sweep.sweep_aligned
    raise ValueError(f"unknown backend {name!r}")
