from src.detection.detector import ChannelSpec, PhaseFilter, click_probabilities
from src.detection.events import DetectionTally
