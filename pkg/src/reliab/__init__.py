"""Reliability-controlled optimisation: reflex signals, a fused reliability
index that scales the learning rate, and Lyapunov-style stability audits
around a small numpy MLP."""
from .controller import (ControllerConfig, FusionWeights, Mode, classify_mode,
                         contraction_bound, fuse, learning_rate)
from .errors import (AuditError, ConfigError, DomainError, FormatError,
                     InvalidObservationError, ReliabError, TrainingFault)
from .kernels import BACKEND as KERNEL_BACKEND
from .reflexes import (ReflexEstimatorState, StepObservation, incident_reflex,
                       memory_reflex, overconfidence_reflex)
from .stability import LyapunovLedger, alignment_diagnostics, lyapunov, stepsize_condition

__version__ = "0.1.0"
