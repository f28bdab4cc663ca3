from src.visualization.plotter import RatePlotter
