"""Atomic fetch-add for numba kernels, lowered to an LLVM ``atomicrmw``.

CPython threads running nogil-compiled kernels genuinely race on shared
arrays; plain ``arr[i] += v`` loses updates there. This intrinsic is the
real read-modify-write the contended histogram baseline is built on.
"""

from numba import types
from numba.core import cgutils
from numba.extending import intrinsic


@intrinsic
def atomic_add_u64(typingctx, arr, idx, val):
    """Atomically add ``val`` to ``arr[idx]``; returns the previous value.

    ``arr`` must be a uint64 array. No bounds checking is performed.
    """
    if not isinstance(arr, types.Array) or arr.dtype != types.uint64:
        return None

    sig = types.uint64(arr, types.intp, types.uint64)

    def codegen(context, builder, signature, args):
        arr_v, idx_v, val_v = args
        array = context.make_array(signature.args[0])(context, builder, arr_v)
        ptr = cgutils.get_item_pointer(
            context, builder, signature.args[0], array, [idx_v], wraparound=False
        )
        return builder.atomic_rmw("add", ptr, val_v, ordering="monotonic")

    return sig, codegen
