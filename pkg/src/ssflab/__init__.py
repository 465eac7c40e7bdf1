"""ssflab: spectral shift functions of random lattice Schrodinger operators,
verified numerically at desk scale."""

__version__ = "0.1.0"
