"""Numerical tolerances and fixed limits shared across modules."""

# generator validation
ROW_SUM_TOL = 1e-12
# stationary distribution residual ||pi G||_inf
STATIONARY_RESIDUAL_TOL = 1e-10
# stochastic-matrix row sums for exp(tau G)
STOCHASTIC_ROW_TOL = 1e-10

# kappa bisection
KAPPA_BRACKET_PAD = 1e-12
KAPPA_MAX_ITER = 200
KAPPA_RTOL = 1e-10

# threshold root solving
ROOT_START = 1e-8
ROOT_RTOL = 1e-12
ROOT_MAX_ITER = 500
ROOT_RESIDUAL_TOL = 1e-10

# simulation
GRID_RTOL = 1e-9
BLOWUP_THRESHOLD = 1e12
# paths per work unit; fixed so results never depend on the thread count
CHUNK_PATHS = 32
# time steps per pre-drawn noise block
NOISE_BLOCK = 4096
