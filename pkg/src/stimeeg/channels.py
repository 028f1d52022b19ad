"""10-20 electrode naming, label normalization, and montage topology tables."""

from __future__ import annotations

# Canonical 19-electrode 10-20 set, in the fixed order used everywhere downstream.
CANONICAL_1020 = (
    "Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8",
    "T3", "C3", "Cz", "C4", "T4",
    "T5", "P3", "Pz", "P4", "T6",
    "O1", "O2",
)

CANONICAL_INDEX = {name: i for i, name in enumerate(CANONICAL_1020)}

# Modern (10-10 style) names mapped onto their 10-20 legacy equivalents.
_MODERN_TO_LEGACY = {
    "T7": "T3",
    "T8": "T4",
    "P7": "T5",
    "P8": "T6",
}

_UPPER_TO_CANONICAL = {name.upper(): name for name in CANONICAL_1020}

# Prefixes/suffixes commonly attached by clinical acquisition systems.
_LABEL_PREFIXES = ("EEG ", "EEG-", "EEG_")
_LABEL_SUFFIXES = ("-REF", "-LE", "-AR", "-AVG", "-A1", "-A2", "-M1", "-M2")


def normalize_label(label: str) -> str | None:
    """Map a raw channel label onto a canonical 10-20 name, or None if not EEG.

    Handles case, "EEG " style prefixes, reference suffixes ("-REF", "-LE"),
    and modern 10-10 equivalents (T7 -> T3, P7 -> T5, ...).
    """
    s = label.strip()
    for p in _LABEL_PREFIXES:
        if s.upper().startswith(p.upper()):
            s = s[len(p):]
            break
    s = s.strip()
    upper = s.upper()
    for suf in _LABEL_SUFFIXES:
        if upper.endswith(suf):
            s = s[: -len(suf)]
            upper = s.upper()
            break
    s = s.strip()
    upper = s.upper()
    if upper in _MODERN_TO_LEGACY:
        return _MODERN_TO_LEGACY[upper]
    return _UPPER_TO_CANONICAL.get(upper)


def is_photic_label(label: str) -> bool:
    return "PHOTIC" in label.upper()


# Small-Laplacian neighbour table (symmetric). Edge electrodes use the
# neighbours that exist; weights are 1/|neighbours|.
LAPLACIAN_NEIGHBOURS = {
    "Fp1": ("Fp2", "F7", "F3"),
    "Fp2": ("Fp1", "F8", "F4"),
    "F7": ("Fp1", "F3", "T3"),
    "F3": ("Fp1", "F7", "Fz", "C3"),
    "Fz": ("F3", "F4", "Cz"),
    "F4": ("Fp2", "F8", "Fz", "C4"),
    "F8": ("Fp2", "F4", "T4"),
    "T3": ("F7", "C3", "T5"),
    "C3": ("F3", "P3", "Cz", "T3"),
    "Cz": ("Fz", "C3", "C4", "Pz"),
    "C4": ("F4", "P4", "Cz", "T4"),
    "T4": ("F8", "C4", "T6"),
    "T5": ("T3", "P3", "O1"),
    "P3": ("C3", "Pz", "T5", "O1"),
    "Pz": ("Cz", "P3", "P4"),
    "P4": ("C4", "Pz", "T6", "O2"),
    "T6": ("T4", "P4", "O2"),
    "O1": ("T5", "P3", "O2"),
    "O2": ("T6", "P4", "O1"),
}

# Standard 18-pair longitudinal double banana.
DOUBLE_BANANA_PAIRS = (
    ("Fp1", "F7"), ("F7", "T3"), ("T3", "T5"), ("T5", "O1"),
    ("Fp1", "F3"), ("F3", "C3"), ("C3", "P3"), ("P3", "O1"),
    ("Fz", "Cz"), ("Cz", "Pz"),
    ("Fp2", "F4"), ("F4", "C4"), ("C4", "P4"), ("P4", "O2"),
    ("Fp2", "F8"), ("F8", "T4"), ("T4", "T6"), ("T6", "O2"),
)

OCCIPITAL = ("O1", "O2")
