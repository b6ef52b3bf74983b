"""Power control for cognitive radio links sharing spectrum with unslotted primary users."""
