"""Exception hierarchy shared across the package.

Every error carries a stable machine ``code`` so the HTTP layer and the CLI
can map failures without string matching.
"""


class ChromalabError(Exception):
    """Base class for all domain errors."""

    code = "error"


# --- composition / recipes ---------------------------------------------------

class AllZero(ChromalabError):
    """Raw composition sums to zero; nothing to normalize."""

    code = "all_zero"


class BadWeights(ChromalabError):
    """Score weights or reference scales violate their preconditions."""

    code = "bad_weights"


class UnknownIngredient(ChromalabError):
    """Recipe references an ingredient the world model does not define."""

    code = "unknown_ingredient"


# --- gateway ------------------------------------------------------------------

class GatewayError(ChromalabError):
    code = "gateway_error"


class BackendUnavailable(GatewayError):
    """Transport-level failure talking to the model backend."""

    code = "backend_unavailable"


class ExhaustedRetries(GatewayError):
    """Every attempt failed output validation."""

    code = "exhausted_retries"


# --- literature ----------------------------------------------------------------

class MalformedOutput(ChromalabError):
    """Validated gateway output still breaks an operation-level rule."""

    code = "malformed_output"


class EmptyCorpus(ChromalabError):
    code = "empty_corpus"


class NotInCorpus(ChromalabError):
    code = "not_in_corpus"


class FulltextMissing(ChromalabError):
    code = "fulltext_missing"


# --- miner ---------------------------------------------------------------------

class EmptyList(ChromalabError):
    """A digest was requested for an empty candidate list."""

    code = "empty_list"


# --- optimizer -------------------------------------------------------------------

class SingularKernel(ChromalabError):
    """Kernel matrix cannot be factorized even at the largest noise level."""

    code = "singular_kernel"


# --- virtual lab -------------------------------------------------------------------

class RankDeficient(ChromalabError):
    """Calibration features carry no usable variation."""

    code = "rank_deficient"


# --- campaign ------------------------------------------------------------------------

class PreconditionFailed(ChromalabError):
    """Operation invoked at the wrong stage or out of order."""

    code = "precondition_failed"


class UnknownCandidate(ChromalabError):
    code = "unknown_candidate"


class RoleConstraintViolated(ChromalabError):
    code = "role_constraint_violated"


class EvaluatorFailure(ChromalabError):
    """A round's evaluator failed; the round stays resumable."""

    code = "evaluator_failure"


class NoRounds(ChromalabError):
    code = "no_rounds"


class CampaignLocked(ChromalabError):
    """Another writer holds the campaign lock."""

    code = "campaign_locked"


class NoSuchCampaign(ChromalabError):
    code = "campaign_not_found"
