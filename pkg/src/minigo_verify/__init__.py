"""minigo-verify: a modular deductive verifier for annotated MiniGo."""

__version__ = "0.1.0"
