# EIT delay line as a Gaussian quantum channel
from .errors import (ExitCode, EitChannelError, InvalidParametersError, DegenerateParametersError,
                     ContractViolationError, ParameterError, NoDelayFoundError, FitConvergenceError,
                     DegenerateFitError, ConfigError, OutputError)
from .logger import LogLevel, ILogger, ConsoleLogger, NullLogger
from .medium import EitParameters, ChannelResponse, susceptibility, group_delay, group_delay_numeric, channel_response
from .quadrature import (Quadrature, GaussianSidebandState, NoiseInjection, apply_passive, apply_injection,
                         end_to_end, excess_noise_db)
from .synth import (TimeSeries, SpectrumEstimate, CrossSpectrum, synth_bandlimited_noise, synth_white_noise,
                    add_tones, filter_through_channel, simulate_channel, estimate_psd, estimate_cross_spectrum,
                    cross_correlate, correlation_width, estimate_delay)
from .metrics import (CurveKind, MetricCurve, conditional_variance_analytic, conditional_variance_empirical,
                      conditional_variance_bruteforce, conditional_variance_fixed_gain, signal_transfer,
                      signal_transfer_model, benchmark_beamsplitter, measure_snr)
from .fit import FitProblem, FitResult, fit
from .scenario import Scenario, load_scenario, parse_scenario, validate_scenario, list_scenarios
from .runner import ScenarioRunner, ResultSet, run_scenario, emit_tables
