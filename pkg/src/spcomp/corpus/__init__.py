"""Bundled protocol specifications."""

from importlib import resources

from ..spec_parser import parse_protocol

NAMES = ("WooLamPi3", "LoweYahalom")


def path(name: str):
    return resources.files(__name__).joinpath(f"{name}.spc")


def text(name: str) -> str:
    return path(name).read_text(encoding="utf-8")


def load(name: str):
    return parse_protocol(text(name), f"{name}.spc")
