"""Reference inference by enumeration and by weighted simulation."""

from .enumerate import MassFunction, enumerate_program, tvd
from .simulate import SampleSet, simulate_program

__all__ = ["MassFunction", "SampleSet", "enumerate_program", "simulate_program", "tvd"]
