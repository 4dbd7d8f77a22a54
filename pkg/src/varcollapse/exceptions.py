"""Error types raised across the package.

Every error carries a dotted ``code`` so the command-line front end can emit a
machine-readable error object without string matching.
"""


class VarCollapseError(ValueError):
    code = "error"

    def __init__(self, message, **context):
        super().__init__(message)
        self.context = context

    def to_dict(self):
        out = {"code": self.code, "message": str(self)}
        out.update({k: v for k, v in self.context.items() if v is not None})
        return out


class ConfigError(VarCollapseError):
    code = "config.invalid"


class BadPolicy(ConfigError):
    code = "config.bad_policy"


# -- input files -----------------------------------------------------------


class FeatureFormatError(VarCollapseError):
    """Malformed feature input; ``row``/``column`` locate the offending cell."""

    code = "input.malformed"

    def __init__(self, message, row=None, column=None, **context):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message, row=row, column=column, **context)
        self.row = row
        self.column = column


class MalformedHeader(FeatureFormatError):
    code = "input.malformed_header"


class MalformedRow(FeatureFormatError):
    code = "input.malformed_row"


class NonFiniteValue(FeatureFormatError):
    code = "input.non_finite"


class LabelOutOfRange(FeatureFormatError):
    code = "input.label_out_of_range"


class EmptyClass(FeatureFormatError):
    code = "input.empty_class"


# -- numerical degeneracies -------------------------------------------------


class NonSymmetricMatrix(VarCollapseError):
    code = "spectra.non_symmetric"


class NotPositiveSemidefinite(VarCollapseError):
    code = "spectra.not_psd"


class EmptyBetweenSpace(VarCollapseError):
    code = "stats.empty_between_space"


class DegenerateBetweenVariance(VarCollapseError):
    code = "metrics.degenerate_between_variance"


class ZeroNormFeature(VarCollapseError):
    code = "metrics.zero_norm_feature"


class ImbalancedClasses(VarCollapseError):
    code = "probe.imbalanced_classes"


class ShapeMismatch(VarCollapseError):
    code = "probe.shape_mismatch"


class DimensionTooSmall(VarCollapseError):
    code = "synth.dimension_too_small"


class NoNullVector(VarCollapseError):
    code = "synth.no_null_vector"


class SingularTransform(VarCollapseError):
    code = "synth.singular_transform"


class InfiniteLogOdds(VarCollapseError):
    code = "transfer.infinite_log_odds"


class UndefinedCorrelation(VarCollapseError):
    code = "transfer.undefined_correlation"
