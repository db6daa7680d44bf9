from hypothesis import settings

# property tests share the box with threaded simulation tests; wall-clock
# deadlines would make them flaky under load
settings.register_profile("no-deadline", deadline=None)
settings.load_profile("no-deadline")
