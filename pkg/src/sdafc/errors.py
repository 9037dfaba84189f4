"""Exception types raised across the package.

Plain contract violations (bad shapes, values outside their domain, unmet
preconditions) raise ``ValueError``; the classes here carry extra context.
"""


class ParseError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class EmptyInputError(ValueError):
    pass


class QuotaShortfallError(ValueError):
    """A class has fewer rows than a client's pure quota requires."""

    def __init__(self, message, achievable_p):
        self.achievable_p = achievable_p
        super().__init__(f"{message} (achievable p <= {achievable_p:.4f})")


class TrainingDivergedError(RuntimeError):
    def __init__(self, epoch, message="non-finite GAN loss"):
        self.epoch = epoch
        super().__init__(f"{message} at epoch {epoch}")


class NumericOverflowError(FloatingPointError):
    def __init__(self, layer, where="activation"):
        self.layer = layer
        super().__init__(f"non-finite {where} in layer {layer}")


class EmptySelectionError(ValueError):
    pass
