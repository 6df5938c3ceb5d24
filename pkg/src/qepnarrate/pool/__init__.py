"""POOL: a small declarative language over the operator store."""
from .interpreter import Count, Objects, Template, compose_template, evaluate, execute, run_script
from .lexer import Token, tokenize
from .parser import parse, parse_script
from .render import render

__all__ = [
    "Count",
    "Objects",
    "Template",
    "Token",
    "compose_template",
    "evaluate",
    "execute",
    "parse",
    "parse_script",
    "render",
    "run_script",
    "tokenize",
]
