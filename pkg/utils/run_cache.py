"""
Session cache for expensive solves.

Keeps the Hastings-McLeod solution, P_I^2 solutions by T, Whitham edge
states and zone solutions for the session so that a pipeline evaluating
many formulas at the same (t, profile) solves each problem once.
"""

from modules import painleve, whitham
from .logger import log_info


# Session caches
_hm_cache = None
_pi2_cache = {}
_edge_cache = {}
_zone_cache = {}

_T_DIGITS = 12


def fetch_hastings_mcleod(force_refresh=False):
    """
    Hastings-McLeod solution on the default domain.

    Args:
        force_refresh (bool): If True, bypass cache and solve again

    Returns:
        PainleveSolution
    """
    global _hm_cache

    if _hm_cache is not None and not force_refresh:
        return _hm_cache

    _hm_cache = painleve.solve_hastings_mcleod()
    return _hm_cache


def fetch_pi2(T, force_refresh=False):
    """
    P_I^2 solution at T, seeded from the nearest cached T.

    Args:
        T (float): Parameter
        force_refresh (bool): If True, bypass cache and solve again

    Returns:
        PainleveSolution
    """
    key = round(float(T), _T_DIGITS)
    if key in _pi2_cache and not force_refresh:
        return _pi2_cache[key]

    guess = None
    if _pi2_cache:
        nearest = min(_pi2_cache, key=lambda t: abs(t - key))
        guess = _pi2_cache[nearest].values
    _pi2_cache[key] = painleve.solve_pi2(key, guess=guess)
    return _pi2_cache[key]


def fetch_edges(t, profile, force_refresh=False):
    """
    Leading and trailing edge states at t.

    Returns:
        tuple: (leading EdgeState, trailing EdgeState)
    """
    key = (profile.name, round(float(t), _T_DIGITS))
    if key in _edge_cache and not force_refresh:
        return _edge_cache[key]

    edges = (whitham.solve_leading_edge(t, profile), whitham.solve_trailing_edge(t, profile))
    _edge_cache[key] = edges
    return edges


def fetch_zone(t, profile, Nc=64, force_refresh=False):
    """
    Whitham zone solution at t built on the cached edges.

    Returns:
        WhithamBranches
    """
    key = (profile.name, round(float(t), _T_DIGITS), int(Nc))
    if key in _zone_cache and not force_refresh:
        return _zone_cache[key]

    leading, trailing = fetch_edges(t, profile)
    _zone_cache[key] = whitham.solve_whitham_zone(t, profile, Nc=Nc, leading=leading, trailing=trailing)
    return _zone_cache[key]


def clear_cache():
    """
    Clear all cached solutions.

    Useful when changing resolution parameters within a session.
    """
    global _hm_cache
    _hm_cache = None
    _pi2_cache.clear()
    _edge_cache.clear()
    _zone_cache.clear()
    log_info("Run Cache", "Cleared cached solutions")


def get_cache_status():
    """
    Get the current cache status.

    Returns:
        dict: Cache status with counts per entry type
    """
    return {
        'hastings_mcleod_cached': _hm_cache is not None,
        'pi2_count': len(_pi2_cache),
        'edge_count': len(_edge_cache),
        'zone_count': len(_zone_cache),
    }
