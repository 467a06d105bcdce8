from hypothesis import settings

# the first call of a jitted kernel compiles it; do not count that against examples
settings.register_profile("default", deadline=None)
settings.load_profile("default")
