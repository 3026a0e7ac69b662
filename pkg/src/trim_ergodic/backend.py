# Big integer backend.
#
# Orbit arithmetic is written against MPZ, which is Python's int unless gmpy2
# is installed (extra "fast"). Set TRIM_ERGODIC_NOGMPY to force plain ints.

import os

gmpy = None
BACKEND = "python"
MPZ = int

if "TRIM_ERGODIC_NOGMPY" not in os.environ:
    try:
        import gmpy2 as gmpy

        BACKEND = "gmpy"
        MPZ = gmpy.mpz
    except ImportError:
        pass

MPZ_ZERO = MPZ(0)
MPZ_ONE = MPZ(1)
