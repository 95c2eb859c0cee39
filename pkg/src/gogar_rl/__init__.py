"""Reinforcement learning meets deontic scorekeeping.

Q-learning, REINFORCE, actor-critic, A3C and GOGAR-A3C over finite MDPs, a
scorekeeping game engine, and a bridge turning deterministic policies into
committive-consequence universes.
"""

__version__ = "0.1.0"
