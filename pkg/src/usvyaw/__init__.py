"""Gray-box identification of second-order yaw dynamics for twin-thruster USVs."""

from .errors import (ConstantReference, DataError, DivergedNonFinite, EstimationError,
                     InitializerWarning, IntegratorError, InvalidSamplePeriod, InvalidWaveSpec,
                     LengthMismatch, NoDescentDirection, NonFiniteValue, NonUniformSampling,
                     ParseError, RankDeficientRegression, SampleRateMismatch, SplitTooSmall,
                     TooFewSamples, UnstableInitializer, UsvYawError)
from .estim import (EstimationOptions, EstimationReport, IdentificationResult, Termination,
                    cross_validate, equation_error_init, estimate_output_error, fit_percent,
                    format_model_file, free_run, identify, parse_model_file)
from .model import (IDENTIFIED_MODEL, PhysicalParams, SecondOrderTf, SimState, Stability,
                    Torque, applied_torque, dc_gain, describe, drag_torque, is_stable,
                    physical_to_tf, poles, time_constant, yaw_accel)
from .signals import (NoiseSpec, TimeSeriesDataset, add_noise, detrend, differentiate_yaw,
                      load_dataset, save_dataset, split_dataset, square_wave)
from .sim import (DiscreteModel, TimeSeries, discretize_zoh, simulate, simulate_yaw,
                  step_response)

__version__ = "0.1.0"
