"""Relations and synthetic data"""

from .relation import (
    Distribution,
    GenSpec,
    Relation,
    gen_probe,
    gen_skewed,
    gen_uniform,
    generate,
    read_bin,
    write_bin,
)

__all__ = [
    "Distribution",
    "GenSpec",
    "Relation",
    "gen_probe",
    "gen_skewed",
    "gen_uniform",
    "generate",
    "read_bin",
    "write_bin",
]
