"""Exception hierarchy. Every error carries a stable machine-parsable code."""


class RelayerError(Exception):
    code = "error"

    def __init__(self, message, code=None):
        super().__init__(message)
        if code is not None:
            self.code = code


class SizeMismatchError(RelayerError):
    code = "size_mismatch"


class BundleError(RelayerError):
    code = "bundle_invalid"


class PadRecordError(RelayerError):
    code = "pad_record_mismatch"


class FontError(RelayerError):
    code = "font_unresolvable"


class PlanSyntaxError(RelayerError):
    """Plan text could not be parsed even after the repair pass."""

    code = "plan_syntax"

    def __init__(self, message, raw_text=""):
        super().__init__(message)
        self.raw_text = raw_text


class PlanValidationError(RelayerError):
    """One or more plan invariant violations, itemized by code."""

    code = "plan_invalid"

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(v.code for v in self.violations))


class ExpertError(RelayerError):
    code = "expert_failure"


class SelectionUnparsable(RelayerError):
    code = "selection_unparsable"


class PipelineError(RelayerError):
    code = "pipeline_failure"

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
