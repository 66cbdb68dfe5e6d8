"""Round Taylor Method with certified error bounds and a re-executable periodic-orbit proof."""
