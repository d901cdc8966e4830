from pkg.util import inc

def run(x):
    y = inc(x)
    y += 1
    return y
