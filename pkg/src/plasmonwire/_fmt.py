"""Deterministic CSV number formatting: scientific, 9 significant digits."""


def sci9(x) -> str:
    x = float(x)
    if x == 0.0:
        x = 0.0  # normalize -0.0
    return f"{x:.8e}"
