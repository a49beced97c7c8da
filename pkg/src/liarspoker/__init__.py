"""Parameterized Liar's Poker laboratory: engine, solvers, agents, service."""

from .engine import Bid, GameConfig, Hand, Phase, RoundState, new_round

__all__ = ["Bid", "GameConfig", "Hand", "Phase", "RoundState", "new_round"]

__version__ = "0.1.0"
