"""Exception types shared across the library.

Every error carries a ``code`` string of the form ``<module>.<Name>`` that the
CLI prints in its single-line machine-parsable error format.
"""


class StylebakeError(Exception):
    """Base class for all library errors."""

    module = "core"

    @property
    def code(self) -> str:
        return f"{self.module}.{type(self).__name__}"


# --- jigsaw ---------------------------------------------------------------

class NonDivisibleDimensions(StylebakeError):
    """Image height/width is not a multiple of the patch size."""

    module = "jigsaw"


class DimensionMismatch(StylebakeError):
    """Shapes of the supplied operands do not agree."""

    module = "core"


# --- style metrics --------------------------------------------------------

class ChannelMismatch(StylebakeError):
    module = "metrics"


class EmptyFeature(StylebakeError):
    module = "metrics"


class EmptyViewList(StylebakeError):
    module = "metrics"


# --- mesh / render --------------------------------------------------------

class ParseError(StylebakeError):
    """Malformed OBJ record; ``line`` is the 1-based source line number."""

    module = "mesh"

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyMesh(StylebakeError):
    module = "mesh"


class MissingUVs(StylebakeError):
    module = "mesh"


# --- attention ------------------------------------------------------------

class NonFiniteInput(StylebakeError):
    module = "attention"


class EmptyReference(StylebakeError):
    module = "attention"


# --- baking ---------------------------------------------------------------

class CountMismatch(StylebakeError):
    module = "bake"


class NoValidTexels(StylebakeError):
    module = "bake"


# --- dataset --------------------------------------------------------------

class MissingFile(StylebakeError):
    module = "dataset"


class VersionMismatch(StylebakeError):
    module = "dataset"


class CorruptManifest(StylebakeError):
    module = "dataset"


# --- image I/O ------------------------------------------------------------

class ImageFormatError(StylebakeError):
    module = "image"
