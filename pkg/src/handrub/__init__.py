"""Camera-guided hand-rub training engine.

Session protocol state machine, vision gating (presence + step-pass
decisions), sanitizer dispense gate, timing analytics, classifier
evaluation, and a streaming session service.
"""

__version__ = "0.1.0"

from .session import (  # noqa: F401
    Phase,
    RUB_STEPS,
    SessionConfig,
    SessionEvent,
    SessionState,
    advance,
    new_session,
    pending_steps,
)
