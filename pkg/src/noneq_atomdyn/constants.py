"""Physical constants (CODATA 2018), pinned to 12 significant digits.

Every module takes its constants from here so that pinned regression values
are reproducible across platforms.
"""

import hashlib

HBAR = 1.05457181765e-34  # J s
K_B = 1.38064900000e-23  # J / K
C_LIGHT = 2.99792458000e8  # m / s
EPS_0 = 8.85418781280e-12  # F / m

TABLE = {
    "hbar": HBAR,
    "k_B": K_B,
    "c": C_LIGHT,
    "eps_0": EPS_0,
}


def table_hash():
    """Short digest of the constants table, echoed in CSV metadata."""
    text = ";".join(f"{k}={v!r}" for k, v in sorted(TABLE.items()))
    return hashlib.sha256(text.encode()).hexdigest()[:16]
