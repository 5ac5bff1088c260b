"""Budget-minimal layouts of robot arms and conveyor belts on a floor grid."""
__version__ = "0.1.0"
