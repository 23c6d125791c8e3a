// Read and write an array through an encrypted index.
u3 main(u2 xs[4], u2 i) {
    xs[i] = xs[i] + 1;
    return (u3)xs[i] + (u3)xs[0];
}
