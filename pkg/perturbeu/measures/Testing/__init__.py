from .MinimumPerturbationTest import MPTestParams
from .MinimumPerturbationTest import MPTestResult
from .MinimumPerturbationTest import calibrate_variance_ratio
from .MinimumPerturbationTest import critical_value
from .MinimumPerturbationTest import epsilon_variance
from .MinimumPerturbationTest import lognormal_params
from .MinimumPerturbationTest import mp_test
from .MinimumPerturbationTest import mp_test_grid
from .MinimumPerturbationTest import price_moments
