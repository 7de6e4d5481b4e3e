"""Packet-level simulation and measurement-driven online control."""

from .gf import Decoder, MalformedPacket, gf_innovative
from .sim import CsmaChannel, LinkChannel, PhyChannel, Simulator, simulate
from .control import (OnlineConfig, OnlineTrace, broyden_update, measure_zprime,
                      online_gradient, run_online)

__all__ = ["Decoder", "MalformedPacket", "gf_innovative", "CsmaChannel", "LinkChannel",
           "PhyChannel", "Simulator", "simulate", "OnlineConfig", "OnlineTrace",
           "broyden_update", "measure_zprime", "online_gradient", "run_online"]
