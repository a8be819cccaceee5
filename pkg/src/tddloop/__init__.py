"""tddloop: red-green-refactor TDD automation driven by a chat model."""

from .engine import (
    CollaborativeEngine,
    DecisionKind,
    DeveloperDecision,
    completion_check,
    create_session,
    resume_fully_automated,
    run_fully_automated,
)
from .feature import FeatureInput, FeatureSpec, load_feature_file
from .harness import HarnessConfig, RunnerProfile, run_tests
from .integrator import (
    BlockKind,
    ExtractedBlock,
    IntegrationReport,
    count_assertions,
    count_test_functions,
    extract_blocks,
    integrate,
)
from .metrics import SessionMetrics, compute_metrics, count_loc, render_report
from .prompts import (
    ConversationContext,
    assemble_context,
    build_first_prompt,
    build_intermediate_prompt,
    build_refactor_prompt,
)
from .provider import (
    LiveProvider,
    ModelConfig,
    ProviderReply,
    RecordingProvider,
    ReplayProvider,
    record_fixture,
)
from .session import (
    CodeArtifacts,
    InteractionPattern,
    IterationPhase,
    IterationRecord,
    RunStatus,
    Session,
    SessionLog,
    SessionStatus,
    SourceDocument,
    TestRunOutcome,
    append_iteration,
    load_session,
)

__version__ = "0.1.0"
