from .chain import Chain
from .component import ANY, BlockComponent, Component, merge_payloads
from .pipe import Pipe, PipeState

__all__ = ["ANY", "BlockComponent", "Chain", "Component", "Pipe", "PipeState", "merge_payloads"]
