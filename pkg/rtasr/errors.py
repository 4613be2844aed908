class RtAsrError(Exception):
    '''
    Base class for every error raised by the recognition pipeline
    '''


class ConfigError(RtAsrError):
    pass


class AudioFormatError(RtAsrError):
    pass


class FeatureError(RtAsrError):
    pass


class PipelineError(RtAsrError):
    pass


class PipeStalledError(PipelineError):
    '''
    Raised by a pipe that was stalled by an error somewhere in the chain.
    The original error is kept in `cause`.
    '''

    def __init__(self, cause: BaseException):
        super().__init__(f"pipe stalled: {cause}")
        self.cause = cause


class PipeTerminatedError(PipelineError):
    pass


class PipeTimeoutError(PipelineError):
    pass


class ChainLinkError(PipelineError):
    pass


class ChainStopTimeout(PipelineError):
    pass


class TransportError(RtAsrError):
    pass


class VerificationError(TransportError):
    '''
    A received message failed verification; `status` is the Ack code sent back
    '''

    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status


class RetryExhaustedError(TransportError):
    pass


class ScorerError(RtAsrError):
    pass


class WfstFormatError(RtAsrError):
    pass


class DecodeError(RtAsrError):
    pass
