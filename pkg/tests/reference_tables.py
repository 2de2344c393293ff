"""Published classifier incidence table, one row per config.

Columns: Vect SS XDawn ERPC TS | LR LDA MDM RF QDA SVM KNN.
"""
import numpy as np

COLUMNS = ("Vect", "SS", "XDawn", "ERPC", "TS", "LR", "LDA", "MDM", "RF", "QDA", "SVM", "KNN")

INCIDENCE = """
11000 1000000
10000 0100000
10100 0100000
00011 1000000
00010 0010000
10000 0001000
10000 0000100
10000 0000010
10000 0000001
10100 0001000
00011 0001000
10010 0001000
10100 0000100
00011 0000100
10010 0000100
10100 0000010
00011 0000010
10010 0000010
10100 0000001
00011 0000001
10010 0000001
"""


def published_matrix() -> np.ndarray:
    rows = [line.replace(" ", "") for line in INCIDENCE.strip().splitlines()]
    return np.array([[int(ch) for ch in r] for r in rows])


def registry_matrix(registry) -> np.ndarray:
    out = np.zeros((len(registry), len(COLUMNS)), dtype=int)
    for i, cfg in enumerate(registry.values()):
        for name in cfg.transforms + (cfg.estimator,):
            out[i, COLUMNS.index(name)] = 1
    return out
