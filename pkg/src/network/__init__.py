from src.network.capacity import MuInventory, MuSpec, mu_capacity, total_capacity
from src.network.rate import network_rate
from src.network.scheduler import PairingPlan, schedule
