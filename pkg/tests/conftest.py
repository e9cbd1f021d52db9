from hypothesis import HealthCheck, settings

# The sandboxed CI boxes this runs on have noisy timing; keep hypothesis from
# flagging slow examples as failures.
settings.register_profile(
    "default",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")
