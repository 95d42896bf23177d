"""Checkpoint files: parameters, optional optimizer slots, and JSON metadata.

Layout follows :mod:`dancesynth.blobio` with format tag ``checkpoint``.
Parameters are stored under ``param/<name>`` and optimizer accumulators
under ``optim/<slot>/<name>``, both in lexicographic order.
"""

from .. import blobio

TAG = "checkpoint"


def save_checkpoint(path, params, meta=None, optimizer=None, scheduler=None):
    arrays = {f"param/{name}": arr for name, arr in sorted(_param_arrays(params).items())}
    meta = dict(meta or {})
    if optimizer is not None:
        arrays.update({f"optim/{k}": v for k, v in optimizer.arrays().items()})
        meta["optimizer"] = optimizer.meta()
    if scheduler is not None:
        meta["scheduler"] = scheduler.meta()
    blobio.write_store(path, TAG, arrays, meta)


def load_checkpoint(path):
    """Return ``(param_arrays, optimizer_arrays, meta)``."""
    arrays, meta = blobio.read_store(path, TAG)
    params = {k[len("param/"):]: v for k, v in arrays.items() if k.startswith("param/")}
    optim = {k[len("optim/"):]: v for k, v in arrays.items() if k.startswith("optim/")}
    return params, optim, meta


def _param_arrays(params):
    if hasattr(params, "state"):
        return params.state()
    return dict(params)
