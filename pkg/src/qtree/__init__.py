"""Point spectrum and density-of-states atoms of periodic quantum trees."""
