from src.simulation.frame import FrameSpec
from src.simulation.montecarlo import RawKeyPair, monte_carlo_session
from src.simulation.pipeline import simulate_keyrate
from src.simulation.postprocessing import aopp_bitlevel
from src.simulation.tally import expected_tally, sampled_tally
