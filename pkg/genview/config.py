# default values
SEED = 0

NUM_STEPS = 1000
BETA_START = 1e-4
BETA_END = 0.02

NOISE_LEVELS = (0, 100, 200, 300, 400)
MAX_NOISE_LEVEL = 400
TARGET_FRACTION = 0.4
PCA_SAMPLE = 10000

DENOISING_STEPS = 20
GUIDANCE_SCALE = 10.0
GENERATOR_TAG = "pretrained"

TAU = 0.2
SINKHORN_EPSILON = 0.05
SINKHORN_ITERATIONS = 3

# numerical tolerances
ZERO_NORM = 1e-12
FLAT_SPAN = 1e-12
POWER_TOL = 1e-10
POWER_MAX_ITER = 10000
DENSE_EIGEN_MAX_DIM = 64
