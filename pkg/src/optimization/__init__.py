from src.optimization.optimizer import ParamBounds, optimize_params
