"""Shared context depths so the expensive Lax-root computations are cached
once per pytest process (gd_context is lru_cached on its arguments)."""

from drhier.gdhier import gd_context

CTX_DEPTH = {2: 13, 3: 16, 4: 12, 5: 13}


def ctx_for(r):
    return gd_context(r, CTX_DEPTH[r])
