# Configuration for the PATL model checker
LOG_LEVEL = "INFO"

# Upper bound on strategy x adversary-policy combinations the brute-force oracle accepts
BRUTE_FORCE_GUARD = 100_000

# Parallel strategy search
DEFAULT_JOBS = 1
CHUNK_SIZE = 64

# Monte Carlo simulation
DEFAULT_SEED = 42
DEFAULT_SAMPLES = 10_000
DEFAULT_STEP_BOUND = 10_000
MC_BLOCK_SIZE = 1_000
CONFIDENCE_LEVEL = 0.99

# Probabilities drawn by the random instance generator
RATIONAL_PALETTE = ("1/4", "1/3", "1/2", "2/3", "3/4", "1")

# Election generator
DEFAULT_SPLIT_PROBABILITY = "1/2"
DEFAULT_CANDIDATES = 2
DEFAULT_COMMITTEE_SIZE = 1
DEFAULT_VOTERS = 2
