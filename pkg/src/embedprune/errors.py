"""Exception types shared across the package.

The CLI maps these onto process exit codes: input/format/schema/size
problems exit 2, refusing to overwrite exits 3, contract violations
(mixing artifacts across runs, stale caches) exit 4, and numeric
failures exit 5.
"""


class EmbedPruneError(Exception):
    """Base class for all package errors."""


class FormatError(EmbedPruneError):
    """Malformed input data or a corrupt artifact file."""


class SchemaError(EmbedPruneError):
    """Feature schema cannot be built or does not match the data."""


class SizeError(EmbedPruneError):
    """Input too small (or empty) for the requested operation."""


class ShapeError(EmbedPruneError):
    """Array arguments have incompatible shapes."""


class InputError(EmbedPruneError):
    """Invalid argument values (bad partitions, missing paths, ...)."""


class ContractError(EmbedPruneError):
    """Artifacts from different runs were mixed, or a cache is stale."""


class NumericError(EmbedPruneError):
    """Non-finite values where finite ones are required."""


class MetricError(EmbedPruneError):
    """A metric is undefined for the given inputs."""


class OverwriteError(EmbedPruneError):
    """Output already exists and --force was not given."""
