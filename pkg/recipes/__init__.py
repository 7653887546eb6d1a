"""Figure reproduction recipes."""
