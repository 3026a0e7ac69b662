# Settings for the trim_ergodic project
#
# Every value can be overridden through the environment; the command line and
# the INI config file (see trim_ergodic.cfg) override experiment parameters on
# top of these defaults.

import os


PROJECT_NAME = "trim_ergodic"

LOG_LEVEL = os.getenv("TRIM_ERGODIC_LOG_LEVEL", "INFO")
LOG_FORMAT = "%(asctime)s [%(name)s] %(levelname)s: %(message)s"

# Orbit generation
# A refinement budget of BITS_PER_SYMBOL_BUDGET * N + BUDGET_SLACK_BITS bits
# is allowed for an orbit of N symbols.
BITS_PER_SYMBOL_BUDGET = 64
BUDGET_SLACK_BITS = 4096
# Width of one fresh uniform draw in the cylinder constructions
UNIFORM_CHUNK_BITS = 32
# Precision (bits) of the outward-rounded bracket kept for q_{n-1}/q_n
GAUSS_RATIO_PRECISION = 96

# Countable partitions are tabulated up to this cell index
GAUSS_I_MAX = 10**6

# mpmath working precision (decimal digits)
WORKING_DPS = 50

# Main terms
TAU_RTOL = 1e-12
TAU_MAX_ITER = 400
TAIL_TOLERANCE = 1e-6
SLOPE_TOLERANCE = 0.05

# Mixing
EMPIRICAL_ORBIT_FACTOR = 100
ASSERTED_G_CONSTANT = 1
# empirical correlation estimates stop here; later terms repeat the last one
MIXING_HORIZON = 64
# exact terms below this fraction of the running sums count as settled
SETTLED_TERM_RATIO = 2.0**-60

# Experiments
DEFAULT_GRID = (1000, 10000, 100000)
DEFAULT_SAMPLES = 200
DEFAULT_BASE_SEED = 20130417
THREADS = int(os.getenv("TRIM_ERGODIC_THREADS", os.cpu_count() or 1))

# SQLite Datenbank Einstellungen
SQLITE_DB_PATH = os.getenv("TRIM_ERGODIC_DB", "trim_ergodic.db")
