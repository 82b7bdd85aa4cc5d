"""Verification of polynomial input-output properties of ReLU networks.

Typical use::

    from mosaicverify import load_query, Network, verify
    report = verify(load_query("q.txt"), Network.load("net.json"))
    print(report.verdict)
"""
from ._accel import BACKEND
from .driver import Options, Report, verify
from .network import Network
from .parser import load as load_query
from .parser import parse

__all__ = ["BACKEND", "Network", "Options", "Report", "load_query", "parse", "verify"]
__version__ = "0.1.0"
