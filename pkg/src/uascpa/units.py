"""Exact unit definitions."""

FT_TO_M = 0.3048
NM_TO_M = 1852.0


def ft_to_m(ft: float) -> float:
    return ft * FT_TO_M


def m_to_nm(m):
    return m / NM_TO_M


def nm_to_m(nm: float) -> float:
    return nm * NM_TO_M
