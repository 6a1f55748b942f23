# Spatial Prediction Toolkit Source Package