"""Leader-follower simulation and imitation learning from UWB range/angle observations."""

__version__ = "0.1.0"
