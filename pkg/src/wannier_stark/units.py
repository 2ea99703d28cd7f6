"""Conversions used at the input/output boundary only."""

HARTREE_EV = 27.211386
FIELD_AU_V_PER_CM = 5.142207e9


def hartree_to_ev(e: float) -> float:
    return e * HARTREE_EV


def ev_to_hartree(e: float) -> float:
    return e / HARTREE_EV


def kv_per_cm_to_au(f_kv_cm: float) -> float:
    return f_kv_cm * 1e3 / FIELD_AU_V_PER_CM


def au_to_kv_per_cm(f_au: float) -> float:
    return f_au * FIELD_AU_V_PER_CM / 1e3
